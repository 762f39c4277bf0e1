from typing import Dict, List, Optional, Type

from .base_method import BaseMethod
from .methods import IpwMethod, OracleMethod, OrMethod, PlainAipwMethod, ProposedMethod
from ..core.types import MethodName
from ..core.exceptions import ConfigurationError
from ..pipeline import PipelineConfig


class MethodFactory:
    """Registry of benchmark methods by name."""

    _methods: Dict[str, Type[BaseMethod]] = {}

    @classmethod
    def register_method(cls, name: str, method_class: Type[BaseMethod]):
        cls._methods[name] = method_class

    @classmethod
    def create_method(cls, name: str, config: Optional[PipelineConfig] = None) -> BaseMethod:
        key = name.value if isinstance(name, MethodName) else str(name)
        method_class = cls._methods.get(key)
        if not method_class:
            raise ConfigurationError(f"No method registered for {key}", config_key="methods")
        return method_class(config)

    @classmethod
    def available_methods(cls) -> List[str]:
        return list(cls._methods)


# Register built-in methods
MethodFactory.register_method(MethodName.PROPOSED.value, ProposedMethod)
MethodFactory.register_method(MethodName.PLAIN_AIPW.value, PlainAipwMethod)
MethodFactory.register_method(MethodName.IPW.value, IpwMethod)
MethodFactory.register_method(MethodName.OR.value, OrMethod)
MethodFactory.register_method(MethodName.ORACLE.value, OracleMethod)
