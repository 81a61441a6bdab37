#!/usr/bin/env python3
"""
levy-extract コマンドラインのラッパー（インストールせずに実行する場合）

    python main.py all --config configs/ex1_cubic_1d.json
"""
import sys

from levy_extract.cli import main

if __name__ == "__main__":
    sys.exit(main())
