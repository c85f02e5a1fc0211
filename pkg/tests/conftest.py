import sys
from pathlib import Path

# Make the scalar reference helpers importable from any test module.
sys.path.insert(0, str(Path(__file__).parent))
