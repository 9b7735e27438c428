import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'spinwave_backend.settings')
django.setup()

# Mirror Django's test runner (manage.py test): allows the 'testserver' host.
from django.test.utils import setup_test_environment  # noqa: E402

setup_test_environment()
