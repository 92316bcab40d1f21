#!/usr/bin/env python
"""Command-line entry point for pbrbm.

``python manage.py experiment <pipeline> --preset fig2-desk`` runs a
simulation pipeline; ``migrate`` and ``runserver`` manage the run registry.
"""
import os
import sys


def main():
    """Run pbrbm commands."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'pbrbm.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the pinned stack with "
            "`pip install -r requirements.txt` inside a virtual environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
