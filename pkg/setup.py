"""
Setup configuration for ifs-khintchine package.
"""

from setuptools import setup, find_packages

setup(
    name="ifs-khintchine",
    version="0.1.0",
    description="Khintchine-type experiments, dimension brackets and height bounds for iterated function systems",
    author="Your Name",
    author_email="your.email@example.com",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={"ifs_khintchine": ["presets.yaml"]},
    install_requires=[
        "PyYAML>=5.4.0",
        "tqdm>=4.0.0",
        "numpy>=1.22.0",
        "scipy>=1.8.0",
        "mpmath>=1.2.0",
        "sympy>=1.9",
    ],
    entry_points={
        "console_scripts": [
            "ifs-khintchine=ifs_khintchine.cli:main",
        ],
    },
    python_requires=">=3.9",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
