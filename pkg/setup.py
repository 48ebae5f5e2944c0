"""Build script: compiles the velocity-Verlet extension when Cython and a C
compiler are available; otherwise the package installs with the pure-Python
integrator only (selected automatically at import)."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "qcmd._verlet",
                ["src/qcmd/_verlet.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"qcmd: skipping compiled integrator ({exc}); pure-Python fallback will be used")

setup(ext_modules=ext_modules)
