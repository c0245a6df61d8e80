from setuptools import setup, find_packages

setup(
    name="fkdv-periodic-waves",
    version="0.1.0",
    description="Spectral solvers, branch continuation and stability analysis for periodic waves of the fractional KdV equation",
    author="Your Name",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    py_modules=["branch_cli"],
    python_requires=">=3.8",
    install_requires=[
        "pandas>=2.0.0",
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "python-dotenv>=1.0.0",
        "matplotlib>=3.7.0",
        "statsmodels>=0.13.0",
        "joblib>=1.3.0",
        "tabulate>=0.9.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.4.0",
        ]
    },
    entry_points={
        "console_scripts": [
            "fkdv-branch=branch_cli:main",
        ]
    },
)
