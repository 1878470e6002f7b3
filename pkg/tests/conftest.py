def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: multi-seed training runs (deselect with -m "not slow")')
