from setuptools import setup, find_packages

setup(
    name="hullcert",
    version="0.1.0",
    packages=find_packages(exclude=["examples", "examples.*"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.11.0",
        "pydantic>=2.5.0",
        "python-dotenv>=1.0.0",
        "joblib>=1.3.0",
        "pandas>=2.0.0",
        "matplotlib>=3.8.0",
        "tomli>=2.0.0; python_version < '3.11'",
    ],
)
