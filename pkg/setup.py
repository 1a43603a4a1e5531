import pathlib
from setuptools import setup, find_packages

here = pathlib.Path(__file__).parent.resolve()

# Get the long description from the README file
long_description = (here / 'README.md').read_text(encoding='utf-8')

setup(
    name='pytdnerf',
    version='0.1.0',
    description='tiny hash-encoded NeRF training with manual backprop, federated simulation and budget analysis',
    long_description=long_description,
    long_description_content_type='text/markdown',
    license='MIT',
    keywords='python nerf hash-encoding federated-learning',
    packages=find_packages(exclude=['tests', 'tests.*']),
    install_requires=['numpy', 'scipy', 'h5py', 'matplotlib', 'pandas', 'pillow', 'psutil', 'tqdm'],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['pytdnerf=pytdnerf.cli:main']},
    python_requires='>=3.8'
)
