from django.urls import path, include
from rest_framework.routers import DefaultRouter

from .views import ExperimentRunViewSet, PresetListView


router = DefaultRouter()
router.register('runs', ExperimentRunViewSet, basename='runs')


urlpatterns = [
    path('presets/', PresetListView.as_view(), name='preset-list'),
    path('', include(router.urls)),
]
