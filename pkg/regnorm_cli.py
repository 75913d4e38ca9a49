#!/usr/bin/env python3
"""
regnorm 命令行入口（与 python -m regnorm 等价）

用法示例：
  python regnorm_cli.py kappa --space lp:n=10,p=inf
  python regnorm_cli.py gamma-star --alpha 1.5 --sigma const:1x4
  python regnorm_cli.py simulate --scheme gaussian-iso:n=5 --N 64 --trials 100000 --format csv --out out/gauss.csv
"""

from regnorm.cli import main


if __name__ == "__main__":
    raise SystemExit(main())
