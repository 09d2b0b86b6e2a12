from setuptools import setup


def text_from_file(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


test_dependencies = [
    "coverage",
    "jsonschema",
    "pytest",
    "pytest-black",
    "pytest-cov",
    "pytest-flake8",
    "mypy",
]

extras = {
    "testing": test_dependencies,
}

setup(
    name="yellowlight",
    description="Predicts driver intention and trajectory at yellow lights",
    packages=[
        "yellowlight",
        "yellowlight.config",
        "yellowlight.tests",
        "yellowlight.tests.integration",
        "yellowlight.logging",
    ],
    package_data={
        "yellowlight.config": ["*.toml"],
        "yellowlight.tests": ["data/*"],
    },
    install_requires=[
        "attrs",
        "cattrs",
        "Click",
        "dask[delayed]",
        "numpy",
        "pandas",
        "toml",
    ],
    tests_require=test_dependencies,
    extras_require=extras,
    long_description=text_from_file("README.md"),
    long_description_content_type="text/markdown",
    python_requires=">=3.8",
    entry_points="""
        [console_scripts]
        yellowlight=yellowlight.cli:cli
    """,
    version="2021.1.0",
)
