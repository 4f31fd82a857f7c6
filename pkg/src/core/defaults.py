"""
默认参数表（阿肯色州四个研究区域）

配置文件中缺省的区域字段按区域编号从这里补齐。
"""
from typing import Dict, Tuple

ARKANSAS_REGIONS: Dict[str, Dict[str, float]] = {
    "R1": {
        "population_n": 394446, "beds_b": 1405, "initial_ventilators_X0": 77,
        "contact_beta": 1.873, "max_vax_rho": 0.051, "gamma_m": 0.704, "hosp_rate_sigma": 0.943,
        "S": 299000, "E": 3100, "I_m": 200, "I_s": 2500,
    },
    "R2": {
        "population_n": 1551512, "beds_b": 9357, "initial_ventilators_X0": 566,
        "contact_beta": 2.162, "max_vax_rho": 0.051, "gamma_m": 0.704, "hosp_rate_sigma": 0.877,
        "S": 1107000, "E": 3200, "I_m": 5900, "I_s": 1470,
    },
    "R3": {
        "population_n": 171946, "beds_b": 490, "initial_ventilators_X0": 18,
        "contact_beta": 1.805, "max_vax_rho": 0.043, "gamma_m": 0.704, "hosp_rate_sigma": 0.952,
        "S": 129000, "E": 100, "I_m": 1300, "I_s": 80,
    },
    "R4": {
        "population_n": 611686, "beds_b": 2032, "initial_ventilators_X0": 105,
        "contact_beta": 1.781, "max_vax_rho": 0.050, "gamma_m": 0.699, "hosp_rate_sigma": 0.901,
        "S": 502000, "E": 3500, "I_m": 3600, "I_s": 60,
    },
}

# 每周迁移率，行为迁出区域，列为迁入区域
ARKANSAS_MIGRATION: Dict[Tuple[str, str], float] = {
    ("R1", "R2"): 5.34e-4, ("R1", "R3"): 4.50e-5, ("R1", "R4"): 2.48e-4,
    ("R2", "R1"): 1.28e-4, ("R2", "R3"): 1.92e-5, ("R2", "R4"): 1.45e-4,
    ("R3", "R1"): 1.58e-4, ("R3", "R2"): 3.34e-4, ("R3", "R4"): 3.41e-4,
    ("R4", "R1"): 1.45e-4, ("R4", "R2"): 4.19e-4, ("R4", "R3"): 7.76e-5,
}

ARKANSAS_COUNTY_COUNTS: Dict[str, int] = {"R1": 18, "R2": 14, "R3": 13, "R4": 30}
