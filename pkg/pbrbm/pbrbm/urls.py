"""
URL configuration for the pbrbm project.

The only HTTP surface is the read-only run registry of the ``solver`` app.
"""
from django.urls import path, include

urlpatterns = [
    path('api/', include('solver.urls')),
]
