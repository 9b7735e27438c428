"""
URL configuration for spinwave_backend project.

The JSON API lives under /api/spinwave/; file-writing sweeps are only
available through `manage.py spinwave`.
"""
from django.urls import path, include
from entanglement.views import root_endpoint

urlpatterns = [
    path('', root_endpoint, name='root'),
    path('api/spinwave/', include('entanglement.urls')),
]
