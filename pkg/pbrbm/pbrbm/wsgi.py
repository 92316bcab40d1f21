"""
WSGI config for the pbrbm project.

Serves the read-only run registry (``python manage.py runserver`` during
development).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'pbrbm.settings')

application = get_wsgi_application()
