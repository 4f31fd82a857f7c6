"""
测试公共夹具
"""
from pathlib import Path

import pytest

from src.core.loader import load_config
from src.optimizer.instance import prepare_instance

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def tiny_config():
    """两区域、两阶段、Δ=(2, 2) 的小算例"""
    return load_config(DATA_DIR / "tiny.config")


@pytest.fixture(scope="session")
def tiny_instance(tiny_config):
    return prepare_instance(tiny_config)


@pytest.fixture(scope="session")
def arkansas_config():
    return load_config(DATA_DIR / "arkansas.config")
