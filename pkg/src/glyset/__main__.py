from glyset.cli import main
import sys
sys.exit(main())
