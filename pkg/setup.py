from setuptools import setup, find_packages
setup(
    name="qpauli",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    package_data={"qpauli": ["resources/systems/*.yaml"]},
    install_requires=[
        "numpy",
        "scipy",
        "pyyaml",
    ],
    extras_require={"test": ["pytest", "hypothesis"]},
    entry_points={"console_scripts":["qpauli=qpauli.cli:main"]},
)
