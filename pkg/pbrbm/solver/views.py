from rest_framework import viewsets
from rest_framework.permissions import AllowAny
from rest_framework.response import Response
from rest_framework.views import APIView

from .models import ExperimentRun
from .presets import PRESETS, preset_ids
from .serializers import ExperimentRunSerializer, PresetSerializer


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    Read-only access to the run registry.

    Runs are recorded by the ``experiment`` management command; nothing is
    launched over HTTP. Results are paginated with limit/offset.

    :ivar queryset: every run, newest first.
    :type queryset: QuerySet[ExperimentRun]
    """
    permission_classes = [AllowAny]
    queryset = ExperimentRun.objects.all()
    serializer_class = ExperimentRunSerializer

    def get_queryset(self):
        queryset = super().get_queryset()
        status = self.request.query_params.get("status")
        if status:
            queryset = queryset.filter(status=status.upper())
        pipeline = self.request.query_params.get("pipeline")
        if pipeline:
            queryset = queryset.filter(pipeline=pipeline)
        return queryset


class PresetListView(APIView):
    """Lists the preset ids with their full configuration blocks."""
    permission_classes = [AllowAny]

    def get(self, request):
        data = [{"id": name, "pipeline": PRESETS[name]["pipeline"], "config": PRESETS[name]}
                for name in preset_ids()]
        return Response(PresetSerializer(data, many=True).data)
