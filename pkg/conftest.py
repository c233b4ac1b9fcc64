# Puts the repository root on sys.path so tests import `simultaneity` and `app`.
