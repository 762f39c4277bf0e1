#!/usr/bin/env python3
"""
Environment Setup Script for the Robust HTE Toolkit

Creates a .env file from the template, checks that the numerical stack is
installed and validates the HTE_* settings.
"""

import sys
from pathlib import Path


REQUIRED_PACKAGES = {
    "fastapi": "fastapi",
    "uvicorn": "uvicorn",
    "pydantic": "pydantic",
    "pydantic-settings": "pydantic_settings",
    "python-dotenv": "dotenv",
    "numpy": "numpy",
    "pandas": "pandas",
    "scipy": "scipy",
    "scikit-learn": "sklearn",
    "networkx": "networkx",
    "torch": "torch",
    "joblib": "joblib",
}


def create_env_file() -> bool:
    """Create .env file from template if it doesn't exist."""
    env_file = Path(".env")
    template_file = Path("env_template.txt")

    if env_file.exists():
        print("✅ .env file already exists")
        return True

    if not template_file.exists():
        print("❌ env_template.txt not found. Please ensure it exists.")
        return False

    try:
        env_file.write_text(template_file.read_text(encoding="utf-8"), encoding="utf-8")
        print("✅ Created .env file from template")
        return True
    except OSError as e:
        print(f"❌ Error creating .env file: {e}")
        return False


def check_dependencies() -> bool:
    """Check if required dependencies are installed."""
    missing_packages = []
    for package, module in REQUIRED_PACKAGES.items():
        try:
            __import__(module)
        except ImportError:
            missing_packages.append(package)

    if missing_packages:
        print("❌ Missing required packages:")
        for package in missing_packages:
            print(f"   - {package}")
        print("\n💡 Install missing packages with:")
        print("   pip install -r requirements.txt")
        return False

    print("✅ All required packages are installed")
    return True


def validate_settings() -> bool:
    """Load HTE_* settings and report the effective values."""
    try:
        from robust_hte.core.config import Settings
        settings = Settings()
    except Exception as e:
        print(f"❌ Invalid settings: {e}")
        return False

    print("✅ Settings loaded")
    print(f"📊 seed={settings.default_seed}, n_jobs={settings.n_jobs}, epochs={settings.epochs}, "
          f"latent_dim={settings.latent_dim}, output={settings.output_directory}")
    return True


def main() -> bool:
    """Main setup function."""
    print("🚀 Robust HTE Toolkit - Environment Setup")
    print("=" * 60)

    print("\n1️⃣  Setting up environment file...")
    if not create_env_file():
        return False

    print("\n2️⃣  Checking dependencies...")
    deps_ok = check_dependencies()

    print("\n3️⃣  Validating settings...")
    settings_ok = deps_ok and validate_settings()

    print("\n" + "=" * 60)
    if deps_ok and settings_ok:
        print("🚀 You're ready to start! Run:")
        print("   python -m robust_hte simulate --n 100 --out data.csv")
        print("   python -m robust_hte bench --out-dir results")
        print("   python api_server.py")
        return True

    print("⚠️  Please fix the issues above before continuing.")
    return False


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
