from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="walsh-tf",
    version="0.1.0",
    packages=find_packages(where="src"),
    py_modules=["cli"],
    package_dir={"": "src"},
    install_requires=[
        "click>=8.0.0",
        "numpy>=1.22",
    ],
    entry_points={
        "console_scripts": [
            "walsh-tf=cli:cli",
        ],
    },
    python_requires=">=3.9",
    description="Walsh-model time-frequency analysis and inequality experiments",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords="walsh, time-frequency, carleson, variation, harmonic analysis",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
