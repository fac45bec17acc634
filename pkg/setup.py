from setuptools import setup, find_packages

setup(
    name="receptive-entropy",
    version="0.1",
    packages=find_packages(exclude=["tests"]),
    include_package_data=True,
    package_data={"src.config": ["config.yaml", "corpus/*.yaml"]},
    install_requires=[
        'numpy>=1.26.0',
        'polars>=0.20.2',
        'pyyaml>=6.0.1',
        'joblib>=1.3.2',
    ],
    entry_points={
        'console_scripts': [
            'receptive-entropy=src.harness.cli:main',
        ],
    },
)
