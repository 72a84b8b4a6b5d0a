import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'qfilter_lab.settings')
django.setup()
