"""
Model specification and parameter vectors.

Parameter order is fixed: the regression coefficients in formula-term order,
then ln_lambda0, ln_mu0, ln_gamma_int, ln_gamma_ext, each present only when
the model needs it.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..errors import TransmissionError
from ..hazards import HazardFamily

BASELINE_NAMES = ("ln_lambda0", "ln_mu0", "ln_gamma_int", "ln_gamma_ext")


def _family_or_none(value) -> Optional[HazardFamily]:
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        return None
    return HazardFamily.parse(value)


@dataclass(frozen=True)
class ModelSpec:
    """
    Internal and external families plus formula terms.

    A family of None drops that half of the model: no internal family means
    an external-only model, no external family means external infection is
    ignored.
    """

    internal_family: Optional[HazardFamily] = HazardFamily.EXPONENTIAL
    external_family: Optional[HazardFamily] = HazardFamily.EXPONENTIAL
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "internal_family", _family_or_none(self.internal_family))
        object.__setattr__(self, "external_family", _family_or_none(self.external_family))
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.internal_family is None and self.external_family is None:
            raise TransmissionError("A model needs an internal or an external family")

    @property
    def has_internal(self) -> bool:
        return self.internal_family is not None

    @property
    def has_external(self) -> bool:
        return self.external_family is not None

    @property
    def internal_shape(self) -> bool:
        return self.has_internal and self.internal_family.has_shape

    @property
    def external_shape(self) -> bool:
        return self.has_external and self.external_family.has_shape

    def parameter_names(self) -> List[str]:
        names = list(self.terms)
        if self.has_internal:
            names.append("ln_lambda0")
        if self.has_external:
            names.append("ln_mu0")
        if self.internal_shape:
            names.append("ln_gamma_int")
        if self.external_shape:
            names.append("ln_gamma_ext")
        return names

    @property
    def n_params(self) -> int:
        return len(self.parameter_names())

    def with_terms(self, terms: Sequence[str]) -> "ModelSpec":
        return ModelSpec(self.internal_family, self.external_family, tuple(terms))

    def with_families(self, internal, external) -> "ModelSpec":
        return ModelSpec(internal, external, self.terms)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "internal_family": self.internal_family.value if self.has_internal else "none",
            "external_family": self.external_family.value if self.has_external else "none",
            "terms": list(self.terms),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelSpec":
        return cls(
            internal_family=data.get("internal_family", "exponential"),
            external_family=data.get("external_family", "exponential"),
            terms=tuple(data.get("terms", ())),
        )


@dataclass(frozen=True)
class ParamSet:
    """
    Full parameter vector on the log scale.

    Attributes:
        beta: Log rate ratios keyed by formula term
        ln_lambda0: Log baseline internal rate
        ln_mu0: Log baseline external rate
        ln_gamma_int: Log internal shape (families with a shape only)
        ln_gamma_ext: Log external shape (families with a shape only)
    """

    beta: Mapping[str, float] = field(default_factory=dict)
    ln_lambda0: Optional[float] = None
    ln_mu0: Optional[float] = None
    ln_gamma_int: Optional[float] = None
    ln_gamma_ext: Optional[float] = None

    @property
    def gamma_int(self) -> float:
        return 1.0 if self.ln_gamma_int is None else float(np.exp(self.ln_gamma_int))

    @property
    def gamma_ext(self) -> float:
        return 1.0 if self.ln_gamma_ext is None else float(np.exp(self.ln_gamma_ext))

    def get(self, name: str) -> float:
        if name in BASELINE_NAMES:
            value = getattr(self, name)
        else:
            value = self.beta.get(name)
        if value is None:
            raise TransmissionError(f"Parameter '{name}' is not set")
        return float(value)

    def beta_vector(self, terms: Sequence[str]) -> np.ndarray:
        missing = [t for t in terms if t not in self.beta]
        if missing:
            raise TransmissionError(f"No coefficient for term(s): {', '.join(missing)}")
        return np.asarray([self.beta[t] for t in terms], dtype=float)

    def to_vector(self, spec: ModelSpec) -> np.ndarray:
        return np.asarray([self.get(name) for name in spec.parameter_names()], dtype=float)

    @classmethod
    def from_vector(cls, spec: ModelSpec, vector: Sequence[float]) -> "ParamSet":
        names = spec.parameter_names()
        if len(vector) != len(names):
            raise TransmissionError(
                f"Parameter vector has {len(vector)} entries, model needs {len(names)}"
            )
        values = dict(zip(names, (float(v) for v in vector)))
        return cls(
            beta={t: values[t] for t in spec.terms},
            ln_lambda0=values.get("ln_lambda0"),
            ln_mu0=values.get("ln_mu0"),
            ln_gamma_int=values.get("ln_gamma_int"),
            ln_gamma_ext=values.get("ln_gamma_ext"),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta": dict(self.beta),
            "ln_lambda0": self.ln_lambda0,
            "ln_mu0": self.ln_mu0,
            "ln_gamma_int": self.ln_gamma_int,
            "ln_gamma_ext": self.ln_gamma_ext,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ParamSet":
        return cls(
            beta={str(k): float(v) for k, v in data.get("beta", {}).items()},
            ln_lambda0=data.get("ln_lambda0"),
            ln_mu0=data.get("ln_mu0"),
            ln_gamma_int=data.get("ln_gamma_int"),
            ln_gamma_ext=data.get("ln_gamma_ext"),
        )
