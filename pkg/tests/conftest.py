import numpy as np
import pytest

from glyset import _pykernels, kernels
from glyset.corpus import Recipe
from glyset.features import NUTRIENT_COLUMNS

try:
    from glyset import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

KERNEL_NAMES = ("logistic_loss_grad", "ds_log_terms", "ds_confusion_counts", "coincidence_matrix")


@pytest.fixture(params=["python", "cython"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    if request.param == "cython":
        if _ckernels is None:
            pytest.skip("compiled kernels not built")
        impl = _ckernels
    else:
        impl = _pykernels
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


def make_recipe(rid="r1", nutrients=None, ingredients=("1 cup flour", "2 eggs"), directions=("Mix.", "Bake."), title="Cake", tags=()):
    base = {name: 1.0 for name in NUTRIENT_COLUMNS}
    if nutrients:
        base.update(nutrients)
    return Recipe(rid, title, tuple(ingredients), tuple(directions), base, frozenset(tags))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
