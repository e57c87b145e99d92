// placeholder: populated with the module it tests
