"""
fusion_registry.py

Central registry for all fusion methods in the pm_fusion package.

Responsibilities:
- Keep track of the available fusion methods (prediction market, DS, DDF).
- Resolve aliases such as "dempster-shafer" to canonical names.
- Provide a single API to:
  - get a fresh method instance configured for an episode,
  - list methods and aliases,
  - describe a method.

Method-specific logic lives in the classes under pm_fusion.fusion, which
inherit from FusionMethod.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Dict, List, Optional, Type, Union

from .fusion_base import FusionMethod

logger = logging.getLogger(__name__)


class FusionRegistry:
    """
    Registry for managing fusion methods.

    - Each method has:
        - a class (subclass of FusionMethod), or a lazy loader for it,
        - optional aliases (e.g., "market" for "pm").
    - Methods keep per-episode state, so get_method() always builds a new
      instance; only the resolved classes are cached.
    """

    def __init__(self) -> None:
        # Canonical method name -> method class or lazy loader callable
        self._methods: Dict[str, Union[Type[FusionMethod], Callable[[], Type[FusionMethod]]]] = {}

        # Alias -> canonical method name
        self._aliases: Dict[str, str] = {}

        logger.debug("FusionRegistry initialized")

    # -------------------------------------------------------------------------
    # Registration methods
    # -------------------------------------------------------------------------

    def register(self, method_class: Type[FusionMethod], aliases: Optional[List[str]] = None) -> None:
        """
        Register a method class eagerly.

        Args:
            method_class: Concrete FusionMethod subclass.
            aliases: Optional list of alias names for this method.
        """
        if not isinstance(method_class, type) or not issubclass(method_class, FusionMethod):
            raise TypeError(f"{method_class} must inherit from FusionMethod")

        name = method_class(config={}).get_method_name()
        self._methods[name] = method_class
        logger.info(f"Registered fusion method: {name}")

        for alias in aliases or []:
            self._aliases[alias] = name
            logger.debug(f"Alias registered: {alias} -> {name}")

    def register_lazy(
        self,
        canonical_name: str,
        module_path: str,
        class_name: str,
        aliases: Optional[List[str]] = None,
    ) -> None:
        """
        Register a method lazily. The class is imported only on first use.

        Args:
            canonical_name: Canonical method name (e.g. "ds").
            module_path: Module path string (e.g. "pm_fusion.fusion.ds_fusion").
            class_name: Class name string in the module.
            aliases: Optional list of alias names.
        """

        def lazy_loader() -> Type[FusionMethod]:
            logger.debug(f"Lazy loading fusion method {canonical_name} from {module_path}.{class_name}")
            module = __import__(module_path, fromlist=[class_name])
            cls = getattr(module, class_name)
            if not isinstance(cls, type) or not issubclass(cls, FusionMethod):
                raise TypeError(f"{class_name} in {module_path} is not a FusionMethod")
            return cls

        self._methods[canonical_name] = lazy_loader
        logger.info(f"Registered lazy fusion method: {canonical_name}")

        for alias in aliases or []:
            self._aliases[alias] = canonical_name
            logger.debug(f"Alias (lazy) registered: {alias} -> {canonical_name}")

    # -------------------------------------------------------------------------
    # Lookup helpers
    # -------------------------------------------------------------------------

    def _resolve_canonical_name(self, name_or_alias: str) -> str:
        return self._aliases.get(name_or_alias, name_or_alias)

    def _resolve_class(self, canonical: str) -> Type[FusionMethod]:
        entry = self._methods[canonical]
        if isinstance(entry, type):
            return entry
        cls = entry()
        self._methods[canonical] = cls
        return cls

    # -------------------------------------------------------------------------
    # Public API
    # -------------------------------------------------------------------------

    def canonical_name(self, name_or_alias: str) -> str:
        """
        Canonical name of a registered method.

        Raises:
            KeyError if the method is not registered.
        """
        canonical = self._resolve_canonical_name(name_or_alias)
        if canonical not in self._methods:
            raise KeyError(f"Fusion method '{name_or_alias}' not registered. Available: {self.list_methods()}")
        return canonical

    def get_method(self, name_or_alias: str, config: Optional[Dict[str, Any]] = None) -> FusionMethod:
        """
        Build a new method instance.

        Args:
            name_or_alias: The method name or alias.
            config: Options handed to the method's constructor.

        Raises:
            KeyError if the method is not registered.
        """
        canonical = self.canonical_name(name_or_alias)
        method = self._resolve_class(canonical)(config=dict(config or {}))
        logger.debug(f"Created fusion method instance for {canonical}: {method}")
        return method

    def list_methods(self) -> List[str]:
        return list(self._methods.keys())

    def list_aliases(self, canonical_name: str) -> List[str]:
        return [a for a, c in self._aliases.items() if c == canonical_name]

    def info(self, name_or_alias: str) -> Dict[str, Any]:
        """
        Return metadata for a given method (name or alias).
        """
        try:
            method = self.get_method(name_or_alias)
            canonical = self._resolve_canonical_name(name_or_alias)
            return {
                "name": method.get_method_name(),
                "description": method.get_description(),
                "canonical_name": canonical,
                "aliases": self.list_aliases(canonical),
                "method_class": method.__class__.__name__,
                "settles_market": method.settles_market(),
            }
        except KeyError as exc:
            return {"error": str(exc)}

    def __repr__(self) -> str:
        return f"FusionRegistry(methods={self.list_methods()})"


# -------------------------------------------------------------------------
# Global helpers
# -------------------------------------------------------------------------

_global_registry: Optional[FusionRegistry] = None


def get_global_registry() -> FusionRegistry:
    """
    Get (or create) the global FusionRegistry instance.
    """
    global _global_registry
    if _global_registry is None:
        _global_registry = FusionRegistry()
    return _global_registry


def register_default_methods(registry: Optional[FusionRegistry] = None) -> FusionRegistry:
    """
    Register the built-in methods (pm, ds, ddf), by default with the global registry.

    Called once at package initialization (pm_fusion/__init__.py).
    """
    registry = registry or get_global_registry()

    registry.register_lazy(
        canonical_name="pm",
        module_path="pm_fusion.fusion.market_fusion",
        class_name="MarketFusion",
        aliases=["market", "prediction-market"],
    )

    registry.register_lazy(
        canonical_name="ds",
        module_path="pm_fusion.fusion.ds_fusion",
        class_name="DempsterShaferFusion",
        aliases=["dempster-shafer", "DS"],
    )

    registry.register_lazy(
        canonical_name="ddf",
        module_path="pm_fusion.fusion.ddf_fusion",
        class_name="InformationFilterFusion",
        aliases=["information-filter", "DDF"],
    )

    logger.debug("Default fusion methods registered")
    return registry
