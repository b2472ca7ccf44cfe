import numpy as np
import pytest

from specmesh.model import fit
from specmesh.spectral import basis_for_mesh
from specmesh.synthetic import bumpy_template, icosphere, make_dataset


@pytest.fixture(scope="session")
def ico2():
    return icosphere(2)


@pytest.fixture(scope="session")
def bumpy2():
    return bumpy_template(2)


@pytest.fixture(scope="session")
def small_dataset():
    """12 bumpy spheres at 162 vertices, preprocessed."""
    return make_dataset(n_shapes=12, subdivisions=2, seed=0)


@pytest.fixture(scope="session")
def small_basis(small_dataset):
    return basis_for_mesh(small_dataset.mean_mesh(), 40)


@pytest.fixture(scope="session")
def small_model(small_dataset, small_basis):
    return fit(small_dataset, small_basis, d_low=8, d_high=8)


@pytest.fixture(scope="session")
def acc_dataset():
    """Main acceptance dataset: 48 subjects at 2562 vertices."""
    return make_dataset(n_shapes=48, subdivisions=4, seed=11)


@pytest.fixture(scope="session")
def acc_basis(acc_dataset):
    return basis_for_mesh(acc_dataset.mean_mesh(), 100)


@pytest.fixture(scope="session")
def acc_model(acc_dataset, acc_basis):
    return fit(acc_dataset, acc_basis, d_low=32, d_high=32, gamma=1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
