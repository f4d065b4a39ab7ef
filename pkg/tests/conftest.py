"""Shared fixtures: small meshes and their assembled tables.

Session-scoped because mesh tables are immutable; tests must not
mutate them (the arrays are write-protected anyway).
"""

import pytest

from wgstokes import analysis, forms, mesh, polybasis


@pytest.fixture(scope="session")
def mesh2():
    return mesh.build_uniform_square(2)


@pytest.fixture(scope="session")
def mesh3():
    return mesh.build_uniform_square(3)


@pytest.fixture(scope="session")
def mesh4():
    return mesh.build_uniform_square(4)


@pytest.fixture(scope="session")
def tables4(mesh4):
    return polybasis.build_tables(mesh4, 1)


@pytest.fixture(scope="session")
def lf4(tables4):
    return forms.assemble_local(tables4)


@pytest.fixture(scope="session")
def tables2_k2(mesh2):
    return polybasis.build_tables(mesh2, 2)


@pytest.fixture(scope="session")
def lf2_k2(tables2_k2):
    return forms.assemble_local(tables2_k2)


@pytest.fixture(scope="session")
def case1():
    return analysis.make_case(1)


@pytest.fixture(scope="session")
def case2():
    return analysis.make_case(2)
