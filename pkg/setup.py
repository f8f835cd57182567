#!/usr/bin/env python
# coding: utf-8
"""
Setup script for package.
"""
from __future__ import print_function
import os
import codecs
from email.utils import parseaddr
from setuptools import setup, find_packages

import hermitelab


def file_get_contents(filename):
    """Reads an entire file into a string."""
    assert os.path.exists(filename) and os.path.isfile(filename), 'invalid filename: ' + filename
    return codecs.open(filename, 'r', 'utf-8').read()

SETUP_DIR = os.path.abspath(os.path.dirname(__file__))
AUTHOR, AUTHOR_EMAIL = parseaddr(hermitelab.__author__)
LONG_DESCRIPTION = '\n'.join([file_get_contents('README.rst'), file_get_contents('CHANGELOG.md')])

setup(
    name='hermitelab',
    version=hermitelab.__version__,
    description='Monte Carlo and exact checks for Hermite processes and their Malliavin matrices.',
    long_description=LONG_DESCRIPTION,
    long_description_content_type='text/x-rst',
    author=AUTHOR,
    author_email=AUTHOR_EMAIL,
    license='MIT',
    classifiers=(
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Topic :: Utilities'
    ),
    keywords=('stochastic processes', 'wiener chaos', 'malliavin calculus', 'monte carlo', 'rosenblatt'),
    packages=find_packages(exclude=['tests']),
    python_requires='>=3.8',
    install_requires=['numpy', 'scipy', 'tablib', 'docopt', 'munch'],
    platforms='any',
    entry_points={
        'console_scripts': ['hermitelab=hermitelab.cli:cli']
    },
    include_package_data=True,
    zip_safe=False
)
