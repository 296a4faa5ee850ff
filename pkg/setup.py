#!/usr/bin/env python

from __future__ import print_function

import setuptools


setuptools.setup(
    name='smpcnav',
    version='0.1.0',
    description='Stochastic MPC of a mobile robot passing an uncertain '
                'human',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    packages=setuptools.find_packages(),
    scripts=[
        'bin/smpcnav',
    ],
    python_requires='>=3.6',
    install_requires=[
        'casadi>=3.5',
        'loky>=1.2.1',
        'numpy>=1.17',
        'osqp>=0.6.2,<1.0',
        'pytest>=3.0.7',
        'PyYAML>=3.12',
        'repoze.lru>=0.7',
        'scipy>=1.1',
    ],
)
