"""Build script: compiles the optional accelerator extension.

The package works without the extension (a pure-Python backend is selected
at import time), so a missing compiler or Cython only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "jlopt._ncx2_cy",
                sources=["src/jlopt/_ncx2_cy.pyx"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    print(f"jlopt: skipping compiled backend ({exc}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
