"""
Run configuration.

A run is described by a JSON file

    {"model": "competition2", "params": {...}, "kernel": {...},
     "overrides": {"c": 2.0, ...}, "initial": {...}, "output": {"dir": ...}}

with either one shared "kernel" or a "kernels" list (one per species).
Command-line flags override the file's "overrides" block; the merged
values are validated by OverridesForm.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .exceptions import ConfigError, KernelError
from .forms import OverridesForm
from .services.kernels import KernelSpec, kernel_from_config
from .services.population import (
    SystemModel,
    beverton_holt_birth,
    competition2_model,
    delayed_bh_model,
    logistic_model,
    mspecies_model,
    scalar_system,
)

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ('model', 'params', 'kernel', 'kernels', 'overrides', 'initial', 'output')
INITIAL_KEYS = ('history', 'amplitude', 'support')
OUTPUT_KEYS = ('dir',)

MODEL_PARAMS = {
    'logistic': (),
    'beverton_holt': ('d',),
    'kot': ('d',),
    'delayed_bh': ('d', 'a'),
    'competition2': ('d', 'a', 'b', 'd1', 'd2', 'a1', 'a2', 'b1', 'b2'),
    'mspecies': ('m', 'tau', 'd', 'e', 'f'),
}


def _line_of(text: str, key: str) -> int:
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text[:match.start()].count('\n') + 1 if match else 1


@dataclass
class RunConfig:
    path: Path
    model: str
    params: Dict[str, Any]
    kernel_entries: List[Dict[str, Any]]
    overrides: Dict[str, Any] = field(default_factory=dict)
    initial: Dict[str, Any] = field(default_factory=dict)
    output: Dict[str, Any] = field(default_factory=dict)

    def get(self, name: str, default=None):
        value = self.overrides.get(name)
        return default if value is None else value

    @property
    def seed(self) -> Optional[int]:
        return self.overrides.get('seed')

    def build_model(self) -> SystemModel:
        return build_model(self.model, self.params, seed=self.seed)

    def build_kernels(self) -> List[KernelSpec]:
        try:
            return [kernel_from_config(entry, base_dir=self.path.parent)
                    for entry in self.kernel_entries]
        except KernelError as exc:
            raise KernelError(f"{self.path}: {exc}")

    def to_dict(self) -> Dict[str, Any]:
        return {'path': str(self.path), 'model': self.model, 'params': self.params,
                'overrides': {k: v for k, v in self.overrides.items() if v is not None}}


def _reject_unknown(mapping: Dict[str, Any], allowed, text: str, path: Path, where: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(
                f"{path}:{_line_of(text, key)}: unknown {where} key '{key}' "
                f"(allowed: {', '.join(allowed)})"
            )


def load_run_config(path: Union[str, Path],
                    overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Read, check and validate a run configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be a JSON object")

    _reject_unknown(data, TOP_LEVEL_KEYS, text, path, 'top-level')
    model = data.get('model')
    if not isinstance(model, str):
        raise ConfigError(f"{path}: 'model' must be a string naming the model")
    if model not in MODEL_PARAMS:
        raise ConfigError(
            f"{path}:{_line_of(text, 'model')}: unknown model '{model}' "
            f"(expected one of {', '.join(MODEL_PARAMS)})"
        )

    params = data.get('params', {})
    if not isinstance(params, dict):
        raise ConfigError(f"{path}:{_line_of(text, 'params')}: 'params' must be an object")
    _reject_unknown(params, MODEL_PARAMS[model], text, path, f'{model} parameter')

    if ('kernel' in data) == ('kernels' in data):
        raise ConfigError(f"{path}: give exactly one of 'kernel' or 'kernels'")
    entries = [data['kernel']] if 'kernel' in data else data['kernels']
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}:{_line_of(text, 'kernels')}: 'kernels' must be a non-empty list")

    file_overrides = data.get('overrides', {})
    if not isinstance(file_overrides, dict):
        raise ConfigError(f"{path}:{_line_of(text, 'overrides')}: 'overrides' must be an object")
    _reject_unknown(file_overrides, tuple(OverridesForm.base_fields), text, path, 'override')
    merged = dict(file_overrides)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    form = OverridesForm(data=merged)
    if not form.is_valid():
        name, errors = next(iter(form.errors.items()))
        where = _line_of(text, name) if name in file_overrides else 'command line'
        raise ConfigError(f"{path}:{where}: invalid override '{name}': {' '.join(errors)}")

    initial = data.get('initial', {})
    output = data.get('output', {})
    for name, block, allowed in (('initial', initial, INITIAL_KEYS),
                                 ('output', output, OUTPUT_KEYS)):
        if not isinstance(block, dict):
            raise ConfigError(f"{path}:{_line_of(text, name)}: '{name}' must be an object")
        _reject_unknown(block, allowed, text, path, name)

    logger.debug("Loaded run config %s for model %s", path, model)
    return RunConfig(
        path=path,
        model=model,
        params=params,
        kernel_entries=entries,
        overrides=form.cleaned_data,
        initial=initial,
        output=output,
    )


def build_model(name: str, params: Optional[Dict[str, Any]] = None,
                seed: Optional[int] = None) -> SystemModel:
    """Construct a registered model from its config parameters."""
    params = dict(params or {})
    if name not in MODEL_PARAMS:
        raise ConfigError(f"unknown model '{name}'")
    unknown = sorted(set(params) - set(MODEL_PARAMS[name]))
    if unknown:
        raise ConfigError(f"unknown parameter(s) for {name}: {', '.join(unknown)}")

    if name == 'logistic':
        return scalar_system(logistic_model(), seed=seed)
    if name in ('beverton_holt', 'kot'):
        return scalar_system(beverton_holt_birth(params.get('d', 1.0)), seed=seed)
    if name == 'delayed_bh':
        return delayed_bh_model(params.get('d', 1.0), params.get('a', 0.0), seed=seed)
    if name == 'competition2':
        shared = {k: params.get(k) for k in ('d', 'a', 'b')}
        values = {}
        for key in ('d', 'a', 'b'):
            for i in (1, 2):
                value = params.get(f'{key}{i}', shared[key])
                if value is None:
                    raise ConfigError(f"competition2 needs '{key}{i}' or a shared '{key}'")
                values[f'{key}{i}'] = value
        return competition2_model(seed=seed, **values)

    missing = [k for k in ('m', 'tau', 'd', 'e', 'f') if k not in params]
    if missing:
        raise ConfigError(f"mspecies needs parameter(s): {', '.join(missing)}")
    return mspecies_model(params['m'], params['tau'], params['d'], params['e'],
                          params['f'], seed=seed)
