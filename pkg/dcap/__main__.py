"""Allow running the package with python -m dcap."""

from dcap.main import main

if __name__ == "__main__":
    main()
