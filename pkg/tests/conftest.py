import sys
from pathlib import Path

# Make tests/oracles.py importable from any invocation directory.
sys.path.insert(0, str(Path(__file__).parent))
