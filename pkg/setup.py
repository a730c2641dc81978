from setuptools import setup

setup(
    name="lemmanamer",
    version="1.0",
    description="Suggests names for lemmas of formal proof libraries with a multi-input encoder-decoder, and evaluates them against a retrieval baseline.",  # noqa
    license="MIT",
    packages=["lemmanamer"],
    package_data={"lemmanamer": ["data/default_lexicon.txt"]},
    python_requires=">=3.8",
    install_requires=[
        "requests",
        "numpy",
        "scipy",
        "scikit-learn",
        "tomli; python_version < '3.11'",
    ],
    extras_require={"tests": ["pytest"]},
    entry_points={"console_scripts": ["lemmanamer=lemmanamer.cli:main"]},
)
