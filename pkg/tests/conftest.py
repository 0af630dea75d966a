"""
Pytest configuration for testing mkdv-transform.
"""


def pytest_configure(config):
    """
    Register the markers used by the suite.
    """
    config.addinivalue_line("markers", "slow: end-to-end runs on fine grids (minutes)")
