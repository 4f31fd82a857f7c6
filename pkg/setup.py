from setuptools import setup, find_packages

"""
项目依赖管理说明：

1. 环境管理策略
   - 开发环境：使用 conda 管理（environment.yml）
     * 优点：可以管理 Python 版本和系统级依赖
     * 安装：conda env create -f environment.yml

   - 生产环境：使用 pip 管理（setup.py）
     * 优点：更轻量，适合部署
     * 安装：pip install .
     * 开发工具：pip install .[dev]

2. 依赖分类说明
   基础依赖（install_requires）：
   - 项目运行必需的核心依赖
   - 版本固定，确保稳定性
   - 包含数值计算、数据处理、聚类回归、求解器定位等核心功能

   开发依赖（extras_require）：
   - 仅在开发时需要的工具
   - 代码质量、测试、类型检查等
   - 通过 [dev] 选项安装

3. 外部求解器
   - MILP 通过 MPS 文件交给外部可执行程序求解（默认 CBC）
   - pulp 自带 CBC 可执行文件，仅用于定位求解器路径
   - 也可通过环境变量 VENTALLOC_SOLVER 指定
"""

setup(
    name="ventalloc",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    package_data={"": ["*.config"]},
    install_requires=[
        # 核心依赖
        "pandas==2.2.1",        # 表格处理与 CSV 导出
        "numpy==1.26.4",        # 数值计算
        "scikit-learn==1.4.1.post1",  # 层次聚类、误差指标、线性回归
        "scipy>=1.11.0",        # 稀疏矩阵约束校验
        "joblib>=1.3.0",        # 并行扫描与枚举
        "pulp>=2.7.0",          # 定位自带的 CBC 求解器
        # 文件支持
        "openpyxl>=3.1.2",      # Excel 支持
        "pyarrow>=15.0.0",      # Parquet 支持
        # 环境配置
        "python-dotenv>=1.0.0", # 环境变量
    ],
    extras_require={
        "dev": [
            # 代码质量
            "black==24.2.0",    # 代码格式化
            "isort==5.13.2",    # import 排序
            "flake8==7.0.0",    # 代码检查
            # 测试工具
            "pytest==8.0.2",    # 单元测试
            # 类型检查
            "mypy==1.8.0",      # 静态类型检查
            # 开发工具
            "pre-commit==3.6.0", # Git 提交检查
        ]
    },
    entry_points={
        "console_scripts": [
            "ventalloc=src.cli:main",
        ]
    },
    python_requires=">=3.10",
)
