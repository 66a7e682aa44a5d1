import subprocess
import sys
from pathlib import Path

import pytest

GALLERY = Path(__file__).resolve().parents[1] / "gallery"


@pytest.mark.parametrize("script", sorted(GALLERY.glob("demo_*.py")), ids=lambda p: p.stem)
def test_gallery_script_runs(script):
    proc = subprocess.run([sys.executable, str(script)], capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip()
