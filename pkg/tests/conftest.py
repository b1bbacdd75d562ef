"""Shared pytest configuration"""


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: builds a large extension field (deselect with -m 'not slow')")
