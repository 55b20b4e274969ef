"""
pm_fusion.fusion package

Exposes the built-in fusion methods for easier import.
"""

from .ddf_fusion import InformationFilterFusion
from .ds_fusion import DempsterShaferFusion
from .market_fusion import MarketFusion

__all__ = [
    "MarketFusion",
    "DempsterShaferFusion",
    "InformationFilterFusion",
]
