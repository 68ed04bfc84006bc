"""
Entry point for ``python -m besicover <subcommand> ...``.
"""

import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'besicover_project.settings')
    from django.core.management import execute_from_command_line
    execute_from_command_line(['besicover'] + sys.argv[1:])


if __name__ == '__main__':
    main()
