from setuptools import setup, find_packages

setup(
    name='optima',
    version='1.0',
    author='The optima developers',
    packages=find_packages(exclude=('tests',)),
    scripts=[],
    license='MIT',
    description='Package for learning data augmentation distributions by variational inference.',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    python_requires='>=3.7',
    install_requires=[
        "numpy >= 1.17",
        "scipy >= 1.4.0",
        "pandas >= 1.5",
        "matplotlib >= 3.1.0"],
    extras_require={
        "tests": ["pytest >= 6.0"]},
    entry_points={
        "console_scripts": ["optima=optima.execution.commands:main"]},
)
