import pytest

from backgen.sandbox import SandboxClient


@pytest.fixture(scope="session")
def client():
    with SandboxClient() as c:
        yield c
