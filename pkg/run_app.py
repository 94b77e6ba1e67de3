#!/usr/bin/env python3
"""
Fog Defogging Toolkit - Launcher Script
"""

import subprocess
import sys
from pathlib import Path


def check_dependencies():
    """Check if required dependencies are installed"""
    try:
        import numpy
        import scipy
        import pandas
        import joblib
        import tqdm
        print("✅ All dependencies are installed", file=sys.stderr)
        return True
    except ImportError as e:
        print(f"❌ Missing dependency: {e}", file=sys.stderr)
        return False


def install_dependencies():
    """Install required dependencies"""
    print("📦 Installing dependencies...", file=sys.stderr)
    try:
        subprocess.run([
            sys.executable, "-m", "pip", "install",
            "-r", str(Path(__file__).parent / "requirements.txt")
        ], check=True)
        print("✅ Dependencies installed successfully", file=sys.stderr)
        return True
    except subprocess.CalledProcessError:
        print("❌ Failed to install dependencies", file=sys.stderr)
        return False


def main():
    """Main launcher function"""
    if not check_dependencies():
        print("\n📦 Installing missing dependencies...", file=sys.stderr)
        if not install_dependencies():
            print("❌ Cannot proceed without dependencies. Please install manually.", file=sys.stderr)
            sys.exit(1)

    sys.path.insert(0, str(Path(__file__).parent))
    from app.cli import main as cli_main
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
