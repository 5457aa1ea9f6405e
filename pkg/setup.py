import sys
from setuptools import setup

if sys.version_info.major < 3:
    sys.exit('Sorry, pfqpe requires Python 3.x')


setup(
    name = 'pfqpe',
    description = 'Phase estimation with deterministic, randomized and partially '
                  'randomized product formulas',
    long_description="Dense simulation, Trotter error fitting and fault-tolerant "
                     "resource counts for ground-state energy estimation with "
                     "product formulas, qDRIFT and randomized Taylor expansion.",

    packages = ['pfqpe'],
    version = '0.1.0',
    classifiers = [
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Operating System :: OS Independent'
    ],

    python_requires='>=3.8',
    install_requires=['numpy', 'scipy', 'pandas'],
    extras_require={'test': ['pytest']},
    scripts=['bin/pfqpe'],
    options={'build_scripts': {'executable': '/usr/bin/env python3'}},
    package_data={
        'pfqpe': [
            'data/*.pauli',
            'data/*.tensors',
    ]},
)
