"""
Hierarchical clustering of county-level VH series into study regions.
"""

from .hierarchy import ClusterResult, CountySeries, cluster_counties

__all__ = ["ClusterResult", "CountySeries", "cluster_counties"]
