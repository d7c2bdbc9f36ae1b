import sys

from scene_recall.cli import main

sys.exit(main())
