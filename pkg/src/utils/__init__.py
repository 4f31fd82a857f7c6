"""
Utility modules: logging, typed errors and run manifests.
"""
