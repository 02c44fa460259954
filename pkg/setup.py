from setuptools import setup

setup(
    name='cyclecast',
    version='1.0.0',
    description='Trend/cycle decomposition and ARMA forecasting of daily taxi passenger counts',
    package_dir={'': 'src'},
    py_modules=['arma', 'config', 'cycles', 'errors', 'ingest', 'logger', 'main', 'pipeline',
                'spectral', 'stages', 'stats_core', 'visualizer'],
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.23',
        'scipy>=1.9',
        'pandas>=1.5',
        'matplotlib>=3.6',
        'tomli>=2.0; python_version < "3.11"',
    ],
    extras_require={
        'test': ['pytest>=7.3.0', 'pytest-cov>=4.1.0', 'hypothesis>=6.70', 'statsmodels>=0.14'],
    },
    entry_points={'console_scripts': ['cyclecast=main:main']},
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
)
