import os
from pathlib import Path
import re

from setuptools import find_packages, setup

CODE_DIRECTORY = Path(__file__).parent


def read_file(filename):
    """Source the contents of a file"""
    with open(
        os.path.join(os.path.dirname(__file__), filename), encoding="utf-8"
    ) as file:
        return file.read()


def read_version():
    """Version string from vvchip/_version.py"""
    match = re.search(
        r'^__version__ = "([^"]+)"', read_file("vvchip/_version.py"), re.MULTILINE
    )
    return match.group(1)


setup(
    name="vvchip",
    version=read_version(),
    packages=find_packages(),
    long_description=read_file("README.md"),
    description="Simulator of an on-chip directional coupler that emits vector "
    "vortex beams from a femtosecond-laser written ring waveguide",
    python_requires=">=3.7.0",
    install_requires=[
        "lark-parser==0.8.5",
        "numpy>=1.17",
        "scipy>=1.4",
        "pandas>=1.0",
    ],
    entry_points={"console_scripts": ["vvchip = vvchip.cli:main"]},
    package_data={"vvchip": ["grammar/*.lark", "io/calibrations/*.json"]},
    keywords=["photonics", "waveguide", "coupled mode", "vortex", "polarization"],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: BSD License",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Typing :: Typed",
        "Operating System :: OS Independent",
    ],
    long_description_content_type="text/markdown",
    include_package_data=True,
)
