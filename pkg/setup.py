from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the numpy fallback covers everything
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "conicpose._kernels",
                ["src/conicpose/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
