from setuptools import setup, find_packages

with open("README.md", "r") as f:
    long_description = f.read()

with open("version.txt", "r") as f:
    version = f.read().strip()

setup(
    name="secure_content_store",
    version=version,
    description="Deduplicating, encrypted and authenticated content store built on multi-level chunk trees.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.10",
    install_requires=[
        "cryptography>=42",
        "numpy>=1.26",
    ],
    entry_points={
        "console_scripts": [
            "sec-cs=secure_content_store.cli:run",
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ]
)
