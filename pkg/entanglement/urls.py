from django.urls import path
from . import views

urlpatterns = [
    path('health/', views.health_check, name='health_check'),
    path('presets/', views.list_presets, name='list_presets'),
    path('period/', views.period, name='period'),
    path('min-scan/', views.run_min_scan, name='min_scan'),
]
