import logging

from django.conf import settings
from django.utils import timezone
from rest_framework import status
from rest_framework.decorators import api_view
from rest_framework.response import Response

from .exceptions import SpinwaveError
from .presets import PRESETS
from .serializers import CouplingParamsSerializer, SweepConfigSerializer
from .sweeps import min_scan, period_summary, resolve_threads

logger = logging.getLogger(__name__)

# Grid size accepted over HTTP; larger sweeps belong on the command line
API_MAX_STEPS = 20000


@api_view(['GET', 'HEAD'])
def root_endpoint(request):
    """Root endpoint for API information"""
    return Response({
        'message': 'Spin-wave entanglement API',
        'version': '1.0.0',
        'status': 'running',
        'endpoints': {
            'health': '/api/spinwave/health/',
            'presets': '/api/spinwave/presets/',
            'period': '/api/spinwave/period/',
            'min_scan': '/api/spinwave/min-scan/',
        },
        'timestamp': timezone.now().isoformat()
    }, status=status.HTTP_200_OK)


@api_view(['GET'])
def health_check(request):
    """Health check endpoint"""
    return Response({
        'status': 'healthy',
        'message': 'Spin-wave entanglement backend is running',
        'timestamp': timezone.now().isoformat()
    }, status=status.HTTP_200_OK)


@api_view(['GET'])
def list_presets(request):
    return Response({'presets': PRESETS}, status=status.HTTP_200_OK)


@api_view(['POST'])
def period(request):
    """beta and the oscillation period for {k1, k2, k3?, c} or a preset"""
    try:
        serializer = CouplingParamsSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)
        params = serializer.validated_data['params']
        return Response({'params': params.as_dict(), **period_summary(params)}, status=status.HTTP_200_OK)

    except SpinwaveError as e:
        return Response({'error': str(e)}, status=status.HTTP_400_BAD_REQUEST)
    except Exception as e:
        logger.exception("Period calculation failed")
        return Response({'error': f'Period calculation failed: {str(e)}'},
                        status=status.HTTP_500_INTERNAL_SERVER_ERROR)


@api_view(['POST'])
def run_min_scan(request):
    """
    Minimum of V over a time grid.

    Expected payload: the sweep configuration fields, e.g.
    {"preset": "fig2b", "steps": 2000, "spin_convention": "product"}
    """
    try:
        serializer = SweepConfigSerializer(data=request.data)
        if not serializer.is_valid():
            return Response(serializer.errors, status=status.HTTP_400_BAD_REQUEST)
        if serializer.validated_data.get('out'):
            return Response({'error': 'Writing files is only available from the command line'},
                            status=status.HTTP_400_BAD_REQUEST)

        config = serializer.build_config(threads=resolve_threads(None, settings.SPINWAVE_THREADS))
        if config.steps > API_MAX_STEPS:
            return Response({'error': f'steps must not exceed {API_MAX_STEPS}'},
                            status=status.HTTP_400_BAD_REQUEST)

        report = min_scan(config, convention_report=bool(request.data.get('convention_report', False)))
        return Response({
            'params': config.params.as_dict(),
            't_max': config.t_max,
            'steps': config.steps,
            **report.as_dict(),
        }, status=status.HTTP_200_OK)

    except SpinwaveError as e:
        return Response({'error': str(e)}, status=status.HTTP_400_BAD_REQUEST)
    except Exception as e:
        logger.exception("Min scan failed")
        return Response({'error': f'Min scan failed: {str(e)}'},
                        status=status.HTTP_500_INTERNAL_SERVER_ERROR)
