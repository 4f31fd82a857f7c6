"""
Ventilator allocation under vaccine-hesitancy uncertainty.
"""
