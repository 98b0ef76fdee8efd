from uamdp.main import cli

cli()
