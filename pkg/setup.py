from setuptools import setup

setup(
    name='ldastability',
    version='0.0.1',
    packages=['modeling', 'stability', 'export'],
    py_modules=['config', 'errors', 'main'],
    license='Apache 2.0',
    author='knotsrepus',
    author_email='',
    description='Stability of replicated LDA runs via S-CLOP and prototype selection',
    install_requires=[
        'aiofiles',
        'pydantic>=1.10,<2',
        'Jinja2',
        'numpy',
        'pandas',
        'statsmodels',
    ],
    entry_points={
        'console_scripts': ['ldastability=main:run'],
    },
)
