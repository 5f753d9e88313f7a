"""CMake-driven extension build so `pip install` works without extra tooling.

The CMake project is the source of truth; this shim configures it with the
CLI and tests disabled, builds the pybind11 module, and drops the resulting
shared object where setuptools expects the `manipdict._core` extension.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        configure = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_dir),
            "-DCMAKE_BUILD_TYPE=Release",
            "-DMANIPDICT_BUILD_TESTS=OFF",
            f"-DPython3_EXECUTABLE={sys.executable}",
        ]
        subprocess.run(configure, check=True)
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "manipdict_python"],
            check=True,
        )

        produced = sorted((build_dir / "python" / "manipdict").glob("_core.*"))
        if not produced:
            raise RuntimeError("cmake did not produce the _core extension")
        target = Path(self.get_ext_fullpath(ext.name))
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(produced[-1], target)


setup(
    ext_modules=[CMakeExtension("manipdict._core")],
    cmdclass={"build_ext": CMakeBuild},
)
