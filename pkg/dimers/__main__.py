from dimers.cli import main

main()
