"""
ventalloc 启动脚本

等价于安装后的 ventalloc 命令，例如：
    python main.py solve --config data/arkansas.config --out out/solve
"""
import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
