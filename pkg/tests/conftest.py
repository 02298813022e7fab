import sys
from pathlib import Path

# Add scripts directory to path to import the audit modules
sys.path.insert(0, str(Path(__file__).parent.parent / "scripts"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size sampling runs (deselect with -m 'not slow')")
