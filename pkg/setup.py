from setuptools import setup, find_packages

version = __import__('specpart').get_version()

long_description = "Solve and audit volume-constrained optimal k-phase spectral partitions."

setup(name='specpart',
    version=version,
    description='Optimal k-phase spectral partitions on uniform grids',
    long_description=long_description,
    license='MIT',
    classifiers=[
        'Development Status :: 4 - Beta',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    keywords='spectral partition dirichlet eigenvalue shape optimization',
    packages=find_packages(exclude=['tests', 'tests.*']),
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.12',
        'pandas>=1.3',
        ],
    entry_points={
        'console_scripts': [
            'specpart = specpart.cli:main',
        ],
    },
)
